# -*- coding: utf-8 -*-
"""
fbcap — capacidade com realimentação de canais de estados finitos unifilares
via informação dirigida (limitantes por MDP de crença, Q-grafos, dualidade,
simulação de esquema de codificação e estimadores de DI).
"""

__version__ = "0.3.0"
