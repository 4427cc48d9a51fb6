"""**pavlov** keeps the record of each run: a timestamped directory holding an ``_info.json`` with the run's
parameters, a registry of the files written into it, the run's log files and its reports."""
