"""Second-order spectral enclosures for radial Dirac operators in a Hermite basis."""
