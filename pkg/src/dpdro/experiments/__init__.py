"""Simulation and real-data experiments: data generation, baselines, CV and replication."""
