"""Reference trainer for the architecture-design wire protocol.

Receives line-delimited JSON evaluation requests (over stdio or HTTP),
builds the requested architecture as a real message-passing network,
trains it full-batch on a dataset directory, and answers with validation
and test accuracy. One request at a time; a bad request gets an error
response, never a dead loop.
"""

__version__ = "0.1.0"
