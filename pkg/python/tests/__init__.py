"""nsdual test suite.

- tests/unit/ - fast checks of single modules against closed-form values
- tests/integration/ - full solves, scenario runs and the command line
"""
