import pytest

from neuromap.errors import ParseError, ValidationError
from neuromap.hardware import (
    HardwareSpec, Mesh, ParasiticsTemplate, SegmentedBus, TechTemplate, TwoStageNoc, format_hardware,
    mesh_for, parse_hardware, parse_topology,
)


def test_round_trip_default_and_custom():
    for hw in (HardwareSpec(), HardwareSpec(Mesh(3, 2), parasitics=ParasiticsTemplate(r_wl=2.5, c_bl=1e-15),
                                            tech=TechTemplate.for_node(16, bits_per_synapse=1))):
        assert parse_hardware(format_hardware(hw)) == hw


def test_field_names_follow_tables():
    hw = parse_hardware("r_wl = 3\nc_wl_bl = 1e-16\nenergy_per_spike_j = 5e-11\nnode_nm = 32\nsynapse_tech = PCM\n")
    assert hw.parasitics.r_wl == 3.0 and hw.parasitics.c_wl_bl == 1e-16
    assert hw.tech.node_nm == 32 and hw.tech.synapse_tech.value == "PCM"


@pytest.mark.parametrize("text", ["bogus = 1\n", "node_nm = 22\n", "r_wl = -1\n", "energy_per_spike_j = 0\n",
                                  "bits_per_synapse = 3\n", "capacity = 1\n", "topology = ring:4\n"])
def test_invalid_hardware(text):
    with pytest.raises(ValidationError):
        parse_hardware(text)


def test_malformed_line():
    with pytest.raises(ParseError):
        parse_hardware("r_wl 3\n")


def test_topology_specs():
    assert parse_topology("mesh:4x3").n_tiles == 12
    assert parse_topology("bus:5") == SegmentedBus(5)
    t = parse_topology("twostage:2,3")
    assert isinstance(t, TwoStageNoc) and t.n_tiles == 6 and t.n_nodes > 6
    with pytest.raises(ValidationError):
        Mesh(0, 3)


def test_mesh_distances():
    m = Mesh(3, 3)
    assert m.segments((1, 1), (0, 0)) == 2
    assert m.hops((0, 0), (2, 2)) == 3
    assert m.tile_dist[m.index((0, 0)), m.index((2, 2))] == 4
    with pytest.raises(ValidationError):
        m.index((3, 0))


def test_bus_and_twostage_distances():
    b = SegmentedBus(4)
    assert b.segments(0, 3) == 3 and b.hops(0, 3) == 2
    t = TwoStageNoc(2, 2)
    # same group goes through one switch, across groups through the second stage
    assert t.segments(0, 1) == 2
    assert t.segments(0, 2) == 4


def test_mesh_for_is_smallest_square():
    assert mesh_for(1) == Mesh(1, 1)
    assert mesh_for(5) == Mesh(3, 3)
    assert mesh_for(9) == Mesh(3, 3)


def test_node_defaults_endurance_decreases():
    ends = [TechTemplate.for_node(n).read_endurance for n in (65, 45, 32, 16)]
    assert ends == sorted(ends, reverse=True)
    assert TechTemplate(bits_per_synapse=2).n_levels == 4
