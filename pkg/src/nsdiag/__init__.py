"""Scale-invariant Navier-Stokes energy diagnostics and heat-flow Besov norms."""
