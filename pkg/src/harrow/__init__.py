"""Mission planning, variable-autonomy control and simulation for a
mechanical weeding rover.

Subsystems: ``field`` (weed-probability grids), ``pddl`` (typed-STRIPS
front end, grounder, validator), ``planner`` (problem compiler + forward
search), ``explain`` (contrastive challenges), ``autonomy`` (trust-ladder
sessions), ``sim`` (seeded stochastic execution), ``gateway`` (websocket
bridge + CLI).
"""

__version__ = "0.1.0"
