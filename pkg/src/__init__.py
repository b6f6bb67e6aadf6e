"""
hadamard - Pure Hadamard states for Dirac fields on I x S^1
"""
