"""
Core numerics: quadrature, densities, kernels, functionals, norms, verification and the particle solver.
"""
