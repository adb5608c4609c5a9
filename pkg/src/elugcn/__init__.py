"""Label-utilization graph learning for semi-supervised node classification.

The package splits unlabeled nodes by whether a trained GCN agrees with
label propagation, learns a replacement graph whose message passing aligns
the two, and trains a dual-branch GCN that contrasts the original and the
learned graph. See the ``elugcn`` CLI for the end-to-end pipeline.
"""

__version__ = "0.1.0"
