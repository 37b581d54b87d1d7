"""
Runner package: command-line surface of the span NER engine.
"""
