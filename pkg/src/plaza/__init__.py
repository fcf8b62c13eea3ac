"""plaza: layered public deliberation with bridging-based ranking.

Collect statements and agree/disagree/pass votes into a sparse matrix,
rank statements by cross-group support instead of raw popularity, build
interpretable consensus reports, manage panel sampling and deliberation
lifecycle, and stress-test the ranking against coordinated astroturfing.
"""

__version__ = "0.1.0"
