"""Robin-Laplacian spectra, nodal domains and explicit spectral bounds on planar model domains."""

__version__ = "0.1.0"
