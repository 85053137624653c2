"""Semantic-graph prompting for multi-hop QA.

Pipeline stages: load a multi-hop QA dataset, extract per-paragraph semantic
graphs through an LLM backend, build graph-augmented QA prompts, parse the
generated reasoning chains and answers, then score answers (EM/F1/P/R),
chains (ROUGE) and graph groundedness.
"""

__version__ = "0.1.0"
