"""Inference for paired event times with a right-censored second time.

Modules
-------
data       paired records, CSV input and validation
survcore   Kaplan-Meier, Nelson-Aalen, Aalen-Johansen and Greenwood processes
rte        relative treatment effect with asymptotic and resampling inference
rmst       restricted mean survival time difference and ratio
baselines  binomial, Kaplan-Meier ratio and midrank comparison methods
simgen     bivariate Weibull scenarios and true values
harness    Monte Carlo coverage studies
cli        command-line front end
"""

from .data import PairedDataset, PairedRecord, load_csv, validate, write_csv

__version__ = "0.1.0"

__all__ = ["PairedDataset", "PairedRecord", "load_csv", "validate",
           "write_csv", "__version__"]
