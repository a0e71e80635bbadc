"""Image representation, errors and settings"""
