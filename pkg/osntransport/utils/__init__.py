"""
Small general-purpose helpers, free of simulator knowledge.
"""
