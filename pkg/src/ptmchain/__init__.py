"""
Mapping the supply chain of pre-trained deep learning models (PTMs) into the applications
which load them.
"""
from ptmchain.store import Store, open_store  # noqa: F401
from ptmchain.signatures import SignatureSet, load_signatures  # noqa: F401
from ptmchain.scanner import scan_repo, scan_corpus  # noqa: F401
from ptmchain.mapper import link  # noqa: F401
from ptmchain.licenses import classify_license, check_compatibility, license_flows  # noqa: F401

__version__ = "0.1.0.dev0"
