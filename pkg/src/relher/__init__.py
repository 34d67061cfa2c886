"""Goal-conditioned RL for STRIPS planning domains.

Modules:

- ``planning``/``parser``/``sexpr``: domain and problem types, the file
  format, grounding and the successor function
- ``env``: episode mechanics (reset/step/goal test) and trajectory dumps
- ``lifting``: goal-dependency graphs, lifted goal schemas, schema grounding
- ``refine``: hindsight relabeling of trajectories (state/prop/lifted)
- ``autodiff``/``kernels``: reverse-mode tape over numpy plus the compiled
  message-passing hot kernels with a pure fallback
- ``qnet``: relational message-passing Q-network over ground atoms
- ``replay``/``trainer``: prioritized replay and the DQN loop
- ``evalbench``/``generators``/``search``: greedy evaluation, instance
  generators, breadth-first oracles
- ``cli``: the ``relher`` command line entry point
"""

__version__ = "0.1.0"
