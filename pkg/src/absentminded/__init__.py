"""Equilibria of bargaining games with an absentminded party."""
