"""Attribution-verdict sidecar: seq2seq verifiers behind POST /v1/entail."""

__version__ = "0.1.0"
