"""Sudden-quench P(W<0) from Hermite-function overlaps computed by Gauss-Hermite quadrature.

Independent of the Fock-basis propagation in the library. Run with python3.
"""
import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.special import eval_hermite, gammaln
wi, wf, beta = 10.0, 10.0*np.sqrt(3), 0.2
def negprob(hbar, N=60):
    x, wts = hermgauss(300)
    # integrate f(x) e^{-x^2}; use scaled variable so both oscillators resolved
    s = np.sqrt(hbar/wi)  # length scale of initial oscillator (m=1)
    def psi(n, w, q):
        a = w/hbar
        ln = 0.25*np.log(a/np.pi) - 0.5*(n*np.log(2)+gammaln(n+1))
        return np.exp(ln - a*q*q/2)*eval_hermite(n, np.sqrt(a)*q)
    q = x*np.sqrt(2)*s  # e^{-x^2} weight -> need multiply back
    jac = np.sqrt(2)*s*np.exp(x*x)
    P = np.zeros((N, N))
    for n in range(N):
        pn = psi(n, wi, q)
        for m in range(N):
            P[n, m] = np.sum(wts*jac*pn*psi(m, wf, q))**2
    e = np.exp(-beta*hbar*wi*np.arange(N)); pinit = e/e.sum()
    neg = 0.0; tot=0.0
    for n in range(N):
        for m in range(N):
            W = hbar*(wf*(m+0.5)-wi*(n+0.5))
            if W < 0: neg += pinit[n]*P[n, m]
    return neg, P[0,0]
print(negprob(1.0, 40))
print(negprob(1/(2*np.pi), 100))
