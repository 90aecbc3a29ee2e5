"""HTTP service and the request/response models shared with the CLI."""
