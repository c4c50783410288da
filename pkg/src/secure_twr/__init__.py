"""Secure beamforming for two-way relaying through an untrusted amplify-and-forward relay."""

from . import matkit
from .channels import ChannelSet, Dims, PowerBudget, load_channels, paper_fixture, sample_channels, save_channels
from .errors import SecureTWRError
from .schemes import (
    RateReport,
    RelayCombiner2P,
    RelayCombiner3P,
    SourceBeamformers,
    dt_optimal,
    rate_2p,
    rate_3p,
    rate_dt,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelSet",
    "Dims",
    "PowerBudget",
    "RateReport",
    "RelayCombiner2P",
    "RelayCombiner3P",
    "SecureTWRError",
    "SourceBeamformers",
    "dt_optimal",
    "load_channels",
    "matkit",
    "paper_fixture",
    "rate_2p",
    "rate_3p",
    "rate_dt",
    "sample_channels",
    "save_channels",
]
