"""Learning Fourier-diagonal linear operators from gridded function pairs."""
