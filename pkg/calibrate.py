# Dev-only calibration harness (not part of the package).
import sys
import time
from onocsim.config import parse_config
from onocsim.engine import run as run_engine


def trial(S, qb, ing, h, seeds=3, cycles=100_000, width=4):
    patterns = ["random", "bitreversal", "shuffle", "hotspot"]
    out = {}
    for pat in patterns:
        for ber in (1e-9, 3.5e-3):
            gats, gads = [], []
            for seed in range(1, seeds + 1):
                cfg, _, tree = parse_config({
                    "topology": {"width": width, "height": width},
                    "traffic": {"pattern": pat, "hotspot_fraction": h},
                    "attack": {"ber": ber, "links": "all"},
                    "engine": {
                        "optical_cycles_per_flit": S,
                        "hub_queue_packets": qb,
                        "hub_ingress_flits": ing,
                    },
                    "sim": {"seed": seed, "total_cycles": cycles},
                })
                rep = run_engine(cfg, tree)
                gats.append(rep.gat)
                gads.append(rep.gad if rep.gad is not None else 0.0)
            out[(pat, ber)] = (sum(gats) / len(gats), sum(gads) / len(gads))
    drops, ratios = {}, {}
    for pat in patterns:
        g0, d0 = out[(pat, 1e-9)]
        g1, d1 = out[(pat, 3.5e-3)]
        drops[pat] = 100 * (1 - g1 / g0) if g0 else 0.0
        ratios[pat] = d1 / d0 if d0 else 0.0
    mean_drop = sum(drops.values()) / 4
    ok_band = 50 <= mean_drop <= 85
    ok_all_drop = all(d > 0 for d in drops.values())
    ok_hs_br = drops["hotspot"] >= drops["bitreversal"]
    others = [p for p in patterns if p != "hotspot"]
    ok_ratio = all(ratios["hotspot"] > ratios[p] for p in others) and ratios["hotspot"] >= 3
    print(
        f"S={S:>2} qb={qb} ing={ing:>2} h={h}: mean={mean_drop:5.1f} "
        f"drops R/B/S/H={drops['random']:5.1f}/{drops['bitreversal']:5.1f}/"
        f"{drops['shuffle']:5.1f}/{drops['hotspot']:5.1f} "
        f"ratios R/B/S/H={ratios['random']:6.1f}/{ratios['bitreversal']:6.1f}/"
        f"{ratios['shuffle']:6.1f}/{ratios['hotspot']:6.1f} "
        f"band={'Y' if ok_band else 'n'} all={'Y' if ok_all_drop else 'n'} "
        f"hs>=br={'Y' if ok_hs_br else 'n'} hsmax={'Y' if ok_ratio else 'n'}"
    )
    return ok_band and ok_all_drop and ok_hs_br and ok_ratio


if __name__ == "__main__":
    t0 = time.time()
    grid = eval(sys.argv[1]) if len(sys.argv) > 1 else [
        (4, 1, 8, 0.2), (4, 2, 8, 0.2), (6, 1, 8, 0.2), (6, 2, 16, 0.2),
        (8, 1, 8, 0.2), (8, 2, 16, 0.2), (12, 1, 8, 0.2), (12, 2, 16, 0.2),
    ]
    for params in grid:
        trial(*params)
    print(f"elapsed {time.time()-t0:.0f}s")
