"""Two-stage knowledge-graph question answering.

Stage 1 predicts a question's semantic structure and filters candidate query
graphs to those matching it; stage 2 ranks the survivors with a metric-learning
model and executes the top-1 graph against the knowledge graph.
"""

__version__ = "0.1.0"
