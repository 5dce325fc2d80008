"""Frozen high-precision reference values for V_theta on the real line and on x - i*pi.

Integrates along the rotated ray a = exp(u + i*pi/(2*theta)), which avoids the pole
of the shifted integrand.  Writes theta,x,re,im tables.

    MPMATH_NOGMPY=1 python3 tools/gen_oracle.py crates/qaxb/tests/data
"""
import os
import sys

import mpmath as mp

mp.mp.dps = 30


def log1p_exp_neg(z, th):
    if mp.re(z) < 0:
        return -th * z + mp.log1p(mp.exp(th * z))
    return mp.log1p(mp.exp(-th * z))


def vtheta(z, th):
    eta = mp.pi / (2 * th)
    big = mp.exp(-z)

    def f(u):
        w = u + 1j * eta
        a = mp.exp(w)
        return log1p_exp_neg(w, th) * a / (a + big)

    x = mp.re(z)
    pts = sorted({mp.mpf(-abs(x) - 80), mp.mpf(0), -x, mp.mpf(abs(x) + 40)})
    pts = [p for p in pts if -abs(x) - 80 <= p <= abs(x) + 40]
    fine = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        n = max(1, int((hi - lo) / 2))
        fine.extend(mp.linspace(lo, hi, n + 1)[:-1])
    fine.append(pts[-1])
    val = mp.quad(f, fine)
    return mp.exp(val / (2j * mp.pi))


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "."
    xs = [mp.mpf(-8) + mp.mpf(16) * i / 99 for i in range(100)]
    for name, shift in (("vtheta_real.csv", 0), ("vtheta_shifted.csv", 1)):
        with open(os.path.join(out, name), "w") as fh:
            fh.write("theta,x,re,im\n")
            for th in (6, 10):
                for x in xs:
                    v = vtheta(x - 1j * mp.pi * shift, th)
                    fh.write("%d,%s,%s,%s\n" % (th, mp.nstr(x, 20), mp.nstr(mp.re(v), 25), mp.nstr(mp.im(v), 25)))
                fh.flush()
                print(name, th, "done", flush=True)


if __name__ == "__main__":
    main()
