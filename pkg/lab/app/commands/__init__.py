"""Commands package - one router per concern, each registering its subcommands"""
from . import analytic, maps, percolation

ROUTERS = [analytic, maps, percolation]
HANDLERS = {**analytic.HANDLERS, **maps.HANDLERS, **percolation.HANDLERS}

__all__ = ['ROUTERS', 'HANDLERS']
