"""Write tests/data/welch_fixtures.json from a 50-digit mpmath reference.

The reference is independent of vegrqa.stats: mpmath computes the Welch
statistic, Welch-Satterthwaite df and the two-sided Student-t tail via its
own regularized incomplete beta. Run once; the JSON is committed.
"""

import json
from pathlib import Path

import mpmath as mp
import numpy as np

mp.mp.dps = 50
OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "welch_fixtures.json"


def welch_reference(a, b):
    a = [mp.mpf(x) for x in a]
    b = [mp.mpf(x) for x in b]
    na, nb = len(a), len(b)
    ma, mb = mp.fsum(a) / na, mp.fsum(b) / nb
    va = mp.fsum((x - ma) ** 2 for x in a) / (na - 1)
    vb = mp.fsum((x - mb) ** 2 for x in b) / (nb - 1)
    sa, sb = va / na, vb / nb
    t = (ma - mb) / mp.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa**2 / (na - 1) + sb**2 / (nb - 1))
    p = mp.betainc(df / 2, mp.mpf(1) / 2, 0, df / (df + t**2), regularized=True)
    return t, df, p


def main():
    rng = np.random.default_rng(20141210)
    cases = []
    for _ in range(100):
        na, nb = (int(v) for v in rng.integers(2, 40, size=2))
        loc = rng.normal(0, 1)
        a = rng.normal(0.0, rng.uniform(0.1, 3.0), na)
        b = rng.normal(loc, rng.uniform(0.1, 3.0), nb)
        a = [float(round(x, 6)) for x in a]
        b = [float(round(x, 6)) for x in b]
        t, df, p = welch_reference(a, b)
        cases.append({"a": a, "b": b, "t": mp.nstr(t, 30), "df": mp.nstr(df, 30), "p": mp.nstr(p, 30)})
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(cases, indent=1) + "\n")
    print(f"wrote {len(cases)} cases to {OUT}")


if __name__ == "__main__":
    main()
