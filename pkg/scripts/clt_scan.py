"""Kolmogorov distance of the normalised chaos order to N(0, 1) along a time grid."""
import argparse
import math
from dataclasses import dataclass, field

from chaosspec import schrodinger, she
from chaosspec.spectra import ks_to_standard_normal


@dataclass
class ScanConfig:
    times: list = field(default_factory=lambda: [25.0, 100.0, 400.0, 1600.0])
    beta: float = 1.0
    r0: float = 1.0


def scan(cfg: ScanConfig):
    cov, init = schrodinger.CovarianceModel(1, r0=cfg.r0), schrodinger.InitialDataModel(1)
    for t in cfg.times:
        p = she.SheParams(cfg.beta, t)
        clt = she.clt_params(p)
        ks_she = ks_to_standard_normal(she.pgf_coefficients(p), clt.center(t), clt.scale(t)).ks
        clt = schrodinger.clt_params(cov)
        ks_sch = ks_to_standard_normal(schrodinger.spectrum(cov, init, t), clt.center(t), clt.scale(t)).ks
        yield t, ks_she, ks_sch, ks_she * math.sqrt(t), ks_sch * math.sqrt(t)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--times", default="25,100,400,1600")
    ap.add_argument("--beta", type=float, default=1.0)
    args = ap.parse_args()
    cfg = ScanConfig([float(x) for x in args.times.split(",")], args.beta)
    print("t,ks_she,ks_schrodinger,sqrt_t_ks_she,sqrt_t_ks_schrodinger")
    for row in scan(cfg):
        print(",".join(format(v, ".6g") for v in row))


if __name__ == "__main__":
    main()
