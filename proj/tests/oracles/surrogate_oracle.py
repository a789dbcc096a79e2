"""Independent reference evaluation of the analytic FinFET surrogate.

Used to freeze golden values into the C++ unit tests and to regenerate
tests/data/surrogate_golden.csv. Written directly from the closed-form
definitions with mpmath at 50 digits so it shares no code path with the
C++ implementation.
"""
import csv
import sys

import mpmath as mp

mp.mp.dps = 50

VT = mp.mpf("0.02585")
EPS_HK = mp.mpf("3.453e-11")
W = mp.mpf("1.0e-7")
L = mp.mpf("2.0e-8")
AREA = W * L
PHI_REF = mp.mpf("4.5")
N_C = mp.mpf("1.5")
S_OV = mp.mpf("5.0")
T_QM0 = mp.mpf("1.0e-11")
COX_I = mp.mpf("0.02")
C_DEN = mp.mpf("0.5")
K_DIBL = mp.mpf("0.02")
V_OFF = mp.mpf("0.3")
I_FLOOR = mp.mpf("1e-14")


def sig(x):
    return 1 / (1 + mp.e ** (-x))


def sp(x):
    return mp.log(1 + mp.e ** x)


def cgg(p, vg):
    vth = p["PHIG"] - PHI_REF
    eot_q = p["EOT"] + p["QMFACTOR"] * T_QM0 * sig(p["QMTCECV"] * (vg - vth) / VT)
    return (W * p["CFS"] + W * p["CGSL"] * sig(S_OV * (vth - vg))
            + AREA * (EPS_HK / eot_q) * sig((vg - vth) / (N_C * VT)))


def idrain(p, vg, vd):
    vth = p["PHIG"] - PHI_REF + V_OFF - K_DIBL * p["ETA0"] * vd
    n = 1 + (p["CIT"] + p["CDSCD"] * vd) / C_DEN
    q = n * VT * sp((vg - vth) / (n * VT))
    mu = p["U0"] / (1 + (p["UA"] * sp(vg - vth + mp.mpf("0.3"))) ** p["EU"])
    esat_l = 2 * p["VSAT"] * L / mu
    vdsat = p["KSATIV"] * (q * esat_l) / (q + esat_l) + mp.mpf("1e-3")
    vdseff = vd / (1 + (vd / vdsat) ** p["MEXP"]) ** (1 / p["MEXP"])
    id0 = (W / L) * mu * COX_I * q * vdseff * (1 + p["PCLM"] * (vd - vdseff))
    rds = p["RDSW"] * mp.mpf("1e-6") / W
    i = id0 / (1 + rds * id0 / max(vd, mp.mpf("0.05")))
    return max(i, I_FLOOR)


CGG_GRID = [mp.mpf(k) / 10 for k in range(-7, 8)]
ID_GRID = [mp.mpf(k) / 10 for k in range(0, 8)]
VDS = [mp.mpf("0.05"), mp.mpf("0.7")]

CGG_NAMES = ["PHIG", "CFS", "EOT", "QMFACTOR", "QMTCECV", "CGSL"]
ID_NAMES = ["CIT", "U0", "UA", "EU", "ETA0", "CDSCD", "VSAT", "KSATIV",
            "RDSW", "PCLM", "MEXP"]

CGG_CASES = [
    dict(PHIG="4.5", CFS="1e-10", EOT="1e-9", QMFACTOR="0", QMTCECV="1", CGSL="1e-10"),
    dict(PHIG="4.4", CFS="2e-10", EOT="3e-9", QMFACTOR="-5", QMTCECV="0.5", CGSL="3e-10"),
    dict(PHIG="4.2", CFS="5e-11", EOT="5e-10", QMFACTOR="-10", QMTCECV="2", CGSL="5e-11"),
    dict(PHIG="4.8", CFS="5e-10", EOT="5e-9", QMFACTOR="10", QMTCECV="0.01", CGSL="5e-10"),
]
ID_CASES = [
    dict(PHIG="4.5", CIT="5e-3", U0="2.75e-2", UA="1.5", EU="3", ETA0="3", CDSCD="0.35",
         VSAT="1e5", KSATIV="5", RDSW="175", PCLM="6.5e-2", MEXP="6"),
    dict(PHIG="4.3", CIT="1e-3", U0="1e-2", UA="0.1", EU="2", ETA0="1", CDSCD="0.01",
         VSAT="8e4", KSATIV="1.2", RDSW="60", PCLM="0.04", MEXP="4"),
    dict(PHIG="4.8", CIT="1e-4", U0="5e-2", UA="3", EU="5", ETA0="6", CDSCD="0.7",
         VSAT="1.5e5", KSATIV="10", RDSW="300", PCLM="0.13", MEXP="10"),
    dict(PHIG="4.2", CIT="1e-2", U0="5e-3", UA="0.03", EU="1", ETA0="0.06", CDSCD="7e-5",
         VSAT="5e4", KSATIV="0.1", RDSW="50", PCLM="1.3e-3", MEXP="2.01"),
]


def mpdict(d):
    return {k: mp.mpf(v) for k, v in d.items()}


def golden(out):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["stage", "PHIG"] + CGG_NAMES[1:] + ID_NAMES
               + [f"y{i}" for i in range(16)])
    for case in CGG_CASES:
        p = mpdict(case)
        ys = [mp.nstr(cgg(p, v), 17) for v in CGG_GRID] + [""]
        row = ["cgg", case["PHIG"]] + [case[n] for n in CGG_NAMES[1:]] + [""] * 11 + ys
        w.writerow(row)
    for case in ID_CASES:
        p = mpdict(case)
        ys = [mp.nstr(idrain(p, v, d), 17) for d in VDS for v in ID_GRID]
        row = ["id", case["PHIG"]] + [""] * 5 + [case[n] for n in ID_NAMES] + ys
        w.writerow(row)


if __name__ == "__main__":
    if len(sys.argv) > 1 and sys.argv[1] == "golden":
        golden(sys.stdout)
    else:
        p = mpdict(CGG_CASES[0])
        print("cgg example at Vg=0:", mp.nstr(cgg(p, mp.mpf(0)), 17))
        p = mpdict(ID_CASES[0])
        print("id mid-range Vg=0.7 Vd=0.7:", mp.nstr(idrain(p, mp.mpf("0.7"), mp.mpf("0.7")), 17))
        h = mp.mpf("1e-4")
        gd = (idrain(p, mp.mpf("0.7"), mp.mpf("0.7") + h) - idrain(p, mp.mpf("0.7"), mp.mpf("0.7") - h)) / (2 * h)
        print("gd at Vd=0.7:", mp.nstr(gd, 10))
        for d in VDS:
            print("Vd", d, [mp.nstr(idrain(p, v, d), 6) for v in ID_GRID])
