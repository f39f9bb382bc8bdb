"""Hand-built desk-scale cases used by tests, examples and the CLI.

Susceptances are negative (``b = -1/x``) so that
``F = -b * S_base * (theta_from - theta_to)`` is positive from the
higher-angle end.
"""

from __future__ import annotations

from .case import Bus, CostSegment, DataCenter, DispatchCase, Generator, Line

ANGLE = 0.6  # rad


def _slack(load) -> Bus:
    return Bus(1, tuple(float(v) for v in load), 0.0, 0.0, True)


def _bus(i: int, load) -> Bus:
    return Bus(i, tuple(float(v) for v in load), -ANGLE, ANGLE, False)


def _segs(*pairs) -> tuple[CostSegment, ...]:
    return tuple(CostSegment(float(c), float(p)) for c, p in pairs)


def _dc(ident, bus, peak, lc, aux, energy, horizon) -> DataCenter:
    return DataCenter(ident, bus, float(peak), (float(lc),) * horizon, (float(aux),) * horizon, float(energy))


def one_bus() -> DispatchCase:
    T = 3
    gens = (
        Generator("cheap", 1, _segs((50, 10)), no_load_cost=5.0, ramp_up=100.0, ramp_down=100.0,
                  ghg_rate=1500.0, tox_rate=0.5),
        Generator("peaker", 1, _segs((100, 30), (100, 40)), no_load_cost=20.0, ramp_up=100.0,
                  ramp_down=100.0, ghg_rate=1100.0, tox_rate=0.2),
    )
    return DispatchCase(
        name="one_bus", s_base=100.0, dt_hours=1.0, horizon=T,
        buses=(_slack([20, 60, 45]),), generators=gens, lines=(),
        data_centers=(_dc("dc1", 1, 30, 5, 5, 30, T),),
    )


def two_period() -> DispatchCase:
    """Cheap hour then expensive hour; the flexible optimum is BE = (16, 0)."""
    T = 2
    gens = (
        Generator("cheap", 1, _segs((50, 10)), ramp_up=100.0, ramp_down=100.0, ghg_rate=1500.0, tox_rate=0.5),
        Generator("peaker", 1, _segs((100, 30)), ramp_up=100.0, ramp_down=100.0, ghg_rate=1100.0, tox_rate=0.2),
    )
    return DispatchCase(
        name="two_period", s_base=100.0, dt_hours=1.0, horizon=T,
        buses=(_slack([20, 60]),), generators=gens, lines=(),
        data_centers=(_dc("dc1", 1, 30, 4, 6, 16, T),),
    )


def three_bus() -> DispatchCase:
    T = 4
    buses = (_slack([0, 0, 0, 0]), _bus(2, [40, 55, 70, 50]), _bus(3, [30, 40, 50, 35]))
    lines = (
        Line("L12", 1, 2, -10.0, -200.0, 200.0),
        Line("L23", 2, 3, -10.0, -200.0, 200.0),
        Line("L13", 1, 3, -10.0, -200.0, 200.0),
    )
    gens = (
        Generator("G1", 1, _segs((60, 12), (60, 18)), no_load_cost=10.0, ramp_up=50.0, ramp_down=50.0,
                  ghg_rate=2000.0, tox_rate=0.8),
        Generator("G2", 3, _segs((80, 25), (80, 35)), no_load_cost=15.0, ramp_up=40.0, ramp_down=40.0,
                  ghg_rate=1100.0, tox_rate=0.3),
    )
    return DispatchCase(
        name="three_bus", s_base=100.0, dt_hours=1.0, horizon=T,
        buses=buses, generators=gens, lines=lines,
        data_centers=(_dc("dc2", 2, 40, 8, 10, 48, T),),
    )


def five_bus_congested() -> DispatchCase:
    """Five-bus meshed network whose 4-5 line limit binds at the optimum."""
    T = 4
    shape = (0.8, 0.9, 1.0, 0.95)
    buses = (
        _slack([0] * T),
        _bus(2, [300 * s for s in shape]),
        _bus(3, [300 * s for s in shape]),
        _bus(4, [400 * s for s in shape]),
        _bus(5, [0] * T),
    )
    lines = tuple(
        Line(f"L{i}{j}", i, j, -1.0 / x, -lim, lim)
        for i, j, x, lim in (
            (1, 2, 0.0281, 400.0),
            (1, 4, 0.0304, 1000.0),
            (1, 5, 0.0064, 1000.0),
            (2, 3, 0.0108, 1000.0),
            (3, 4, 0.0297, 1000.0),
            (4, 5, 0.0297, 240.0),
        )
    )
    nox_so2 = lambda nox, so2: (("NOx", nox), ("SO2", so2))  # noqa: E731
    gens = (
        Generator("alta", 1, _segs((40, 14)), no_load_cost=50.0, ramp_up=40.0, ramp_down=40.0,
                  ghg_rate=1200.0, pollutant_rates=nox_so2(0.9, 0.1)),
        Generator("park_city", 1, _segs((85, 15), (85, 16)), no_load_cost=80.0, ramp_up=120.0, ramp_down=120.0,
                  ghg_rate=1150.0, pollutant_rates=nox_so2(0.8, 0.1)),
        Generator("solitude", 3, _segs((260, 30), (260, 32)), no_load_cost=200.0, ramp_up=300.0, ramp_down=300.0,
                  ghg_rate=1900.0, pollutant_rates=nox_so2(1.6, 2.4)),
        Generator("sundance", 4, _segs((100, 40), (100, 42)), no_load_cost=100.0, ramp_up=200.0, ramp_down=200.0,
                  ghg_rate=1300.0, pollutant_rates=nox_so2(1.1, 0.3)),
        Generator("brighton", 5, _segs((300, 10), (300, 11)), no_load_cost=300.0, ramp_up=250.0, ramp_down=250.0,
                  ghg_rate=2100.0, pollutant_rates=nox_so2(2.0, 3.1)),
        Generator("wind3", 3, (), dispatchable=False, fixed_output=(50.0, 80.0, 120.0, 60.0),
                  ghg_rate=0.0, tox_rate=0.0),
    )
    dcs = (
        _dc("dc2", 2, 60, 12, 20, 48, T),
        _dc("dc3", 3, 80, 15, 25, 64, T),
        _dc("dc4", 4, 50, 10, 15, 40, T),
    )
    return DispatchCase(
        name="five_bus_congested", s_base=100.0, dt_hours=1.0, horizon=T,
        buses=buses, generators=gens, lines=lines, data_centers=dcs,
    )


def two_area_priced() -> DispatchCase:
    """Two areas joined by a 50 MW tie-line; cheap supply sits in area A."""
    T = 3
    buses = (
        _slack([0, 0, 0]),
        _bus(2, [20, 30, 25]),
        _bus(3, [80, 100, 90]),
        _bus(4, [10, 10, 10]),
    )
    lines = (
        Line("A12", 1, 2, -20.0, -500.0, 500.0),
        Line("tie23", 2, 3, -10.0, -50.0, 50.0),
        Line("B34", 3, 4, -20.0, -500.0, 500.0),
    )
    gens = (
        Generator("gA", 1, _segs((200, 15)), no_load_cost=10.0, ramp_up=200.0, ramp_down=200.0,
                  ghg_rate=900.0, tox_rate=0.1),
        Generator("gB", 4, _segs((200, 45)), no_load_cost=10.0, ramp_up=200.0, ramp_down=200.0,
                  ghg_rate=1700.0, tox_rate=0.9),
    )
    dcs = (_dc("dcA", 2, 30, 5, 5, 30, T), _dc("dcB", 3, 30, 5, 5, 30, T))
    return DispatchCase(
        name="two_area_priced", s_base=100.0, dt_hours=1.0, horizon=T,
        buses=buses, generators=gens, lines=lines, data_centers=dcs,
    )


FIXTURES = {
    "one_bus": one_bus,
    "two_period": two_period,
    "three_bus": three_bus,
    "five_bus_congested": five_bus_congested,
    "two_area_priced": two_area_priced,
}


def builtin_fixture(name: str) -> DispatchCase:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None
