"""**rebar** holds the small pieces of plumbing the numerics lean on: attribute-access dicts for reports
and records, numpy-backed record types, and a switchable executor for farming out grid work.
"""
