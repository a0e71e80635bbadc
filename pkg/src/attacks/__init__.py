"""Attack algorithms"""
