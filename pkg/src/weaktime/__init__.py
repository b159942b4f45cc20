"""Time-averaged weak values and transition path times for 1D square-barrier scattering."""
