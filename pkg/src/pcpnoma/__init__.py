"""Uplink NOMA rate coverage in Poisson-cluster cellular networks."""
