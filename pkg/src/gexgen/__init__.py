"""gexgen: synthetic gene expression profiles conditioned on histopathology
tiles and clinical text, with the full preprocessing, training, baseline,
ablation, and evaluation tooling needed to run it at desk scale."""

__version__ = "0.1.0"
