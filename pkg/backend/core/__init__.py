"""
Estimation core for propest: population summaries, estimators, moments and the simulation oracle
"""
