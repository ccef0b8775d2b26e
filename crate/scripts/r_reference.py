"""Arbitrary-precision reference values of R(gamma, alpha, x) on a 10x10x10 lattice."""
from mpmath import mp, mpf, exp, log

mp.dps = 40
GAMMAS = ["-3", "-1", "-0.5", "0.25", "1", "1.5", "2", "3.5", "5", "8"]
ALPHAS = ["0", "1e-6", "0.001", "0.01", "0.03", "0.1", "0.3", "0.5", "0.8", "0.99"]
XS = ["-20", "-5", "-0.5", "-1e-8", "1e-6", "0.3", "2", "7.5", "20", "60"]

print("gamma,alpha,x,ln_r,r")
for g in GAMMAS:
    for a in ALPHAS:
        for x in XS:
            ga, al, xx = mpf(g), mpf(a), mpf(x)
            ln_r = ga * log(al + (1 - al) * exp(-xx))
            print(f"{g},{a},{x},{mp.nstr(ln_r, 25)},{mp.nstr(exp(ln_r), 25)}")
