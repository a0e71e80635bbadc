"""Detector-side defenses"""
