"""Quick end-to-end check of the compiled extension.

Run after `pip install --no-build-isolation -e crates/python`.
"""

import json
import math

import flagcap


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    d, p = 2, 0.1
    c = flagcap.c_threshold(p)
    close(c, 2.0 / 3.0, 1e-12)
    close(flagcap.q_fdc(d, p), 0.576207660088, 1e-11)
    close(flagcap.f2_bound(d, p), 0.7, 1e-12)
    assert flagcap.q_fdc(4, 0.0) == 2.0

    ch = flagcap.Channel.fdc(d, p)
    assert ch.in_dim == d and ch.out_dims == [d, 2]
    report = ch.is_cptp()
    assert report["cptp"], report
    close(ch.coherent_information(), flagcap.q_fdc(d, p), 1e-10)
    assert ch.verify_covariance(trials=5, seed=1) < 1e-9

    rho = [[1.0, 0.0], [0.0, 0.0]]
    out = ch.apply(rho)
    close(sum(out[i][i].real for i in range(len(out))), 1.0, 1e-12)

    same = flagcap.Channel.from_json(ch.to_json())
    close(same.coherent_information(), ch.coherent_information(), 1e-12)

    cert = flagcap.verify_degradability(d, p)
    assert cert["certified"], cert
    bad = flagcap.verify_degradability(d, p, c=0.9)
    assert not bad["certified"] and "c'^2" in bad["reason"]

    best = ch.maximize_coherent_info(restarts=8, seed=0)
    close(best["best_value"], flagcap.q_fdc(d, p), 1e-6)

    rows = flagcap.bounds_table(3, p_min=0.0, p_max=0.5, steps=6)
    assert len(rows) == 6
    close(rows[0]["conv"], math.log2(3), 1e-12)

    try:
        flagcap.c_threshold(0.7)
    except ValueError:
        pass
    else:
        raise AssertionError("c_threshold above 1/2 should raise")

    print(json.dumps({"status": "ok", "q_fdc": flagcap.q_fdc(d, p), "certificate": cert["certified"]}))


if __name__ == "__main__":
    main()
