"""Jump ensemble construction, candidate sampling and observables."""
