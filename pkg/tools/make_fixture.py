"""Generate the bundled 15-bus MV benchmark fixture (CIGRE Task Force
C6.04.02 European MV network, radial operating configuration).

Run once; output is committed as src/crbsense/data/cigre_mv.json.
"""

import json
import math

F_HZ = 50.0

CABLE = dict(r_ohm_per_km=0.501, x_ohm_per_km=0.716, c_nf_per_km=151.1749)
OHL = dict(r_ohm_per_km=0.510, x_ohm_per_km=0.366, c_nf_per_km=10.09)

# (from, to, length_km, type, in_service)
LINES = [
    (1, 2, 2.82, CABLE, True),
    (2, 3, 4.42, CABLE, True),
    (3, 4, 0.61, CABLE, True),
    (4, 5, 0.56, CABLE, True),
    (5, 6, 1.54, CABLE, True),
    (7, 8, 1.67, CABLE, True),
    (8, 9, 0.32, CABLE, True),
    (9, 10, 0.77, CABLE, True),
    (10, 11, 0.33, CABLE, True),
    (3, 8, 1.30, CABLE, True),
    (6, 7, 0.24, CABLE, False),   # normally-open switch S2
    (11, 4, 0.49, CABLE, False),  # normally-open switch S3
    (12, 13, 4.89, OHL, True),
    (13, 14, 2.99, OHL, True),
]

# HV/MV transformers 110/20 kV, 25 MVA; series impedance referred to the
# 20 kV side (0.016 + j1.92 ohm), slack models the HV connection point.
TRAFOS = [(0, 1), (0, 12)]
TRAFO_R, TRAFO_X = 0.016, 1.92

# bus: [(S_kVA, power_factor), ...]  residential + commercial/industrial
LOADS = {
    1: [(15300.0, 0.98), (5100.0, 0.95)],
    3: [(285.0, 0.97), (265.0, 0.85)],
    4: [(445.0, 0.97)],
    5: [(750.0, 0.97)],
    6: [(565.0, 0.97)],
    7: [(90.0, 0.85)],
    8: [(605.0, 0.97)],
    9: [(675.0, 0.85)],
    10: [(490.0, 0.97), (81.0, 0.85)],
    11: [(340.0, 0.97)],
    12: [(15300.0, 0.98), (5280.0, 0.95)],
    13: [(40.0, 0.85)],
    14: [(215.0, 0.97), (390.0, 0.85)],
}


def main():
    buses = []
    for i in range(15):
        if i == 0:
            kind = "slack"
        elif i == 2:
            kind = "zero_injection"
        else:
            kind = "load"
        p = q = 0.0
        for s_kva, pf in LOADS.get(i, []):
            p += s_kva * pf / 1000.0
            q += s_kva * math.sin(math.acos(pf)) / 1000.0
        bus = {
            "id": i,
            "kind": kind,
            "base_kv": 20.0,
            "p_load_mw": round(p, 6),
            "q_load_mvar": round(q, 6),
        }
        if i == 0:
            bus["v_setpoint"] = 1.03
        buses.append(bus)

    branches = []
    for f, t in TRAFOS:
        branches.append(
            {"from": f, "to": t, "r_ohm": TRAFO_R, "x_ohm": TRAFO_X,
             "b_us": 0.0, "in_service": True}
        )
    for f, t, km, typ, in_service in LINES:
        b_us = 2.0 * math.pi * F_HZ * typ["c_nf_per_km"] * 1e-9 * km * 1e6
        branches.append(
            {
                "from": f,
                "to": t,
                "r_ohm": round(typ["r_ohm_per_km"] * km, 6),
                "x_ohm": round(typ["x_ohm_per_km"] * km, 6),
                "b_us": round(b_us, 6),
                "in_service": in_service,
            }
        )

    fixture = {"s_base_mva": 1.0, "buses": buses, "branches": branches}
    with open("src/crbsense/data/cigre_mv.json", "w") as fh:
        json.dump(fixture, fh, indent=2)
        fh.write("\n")


if __name__ == "__main__":
    main()
