try:
    from mpi4py import MPI
    parallel = True
except ImportError:
    parallel = False


class FakeComm:
    """Fake MPI communicator class to reduce logic."""

    def __init__(self):
        self.rank = 0
        self.size = 1

    def Barrier(self):
        pass
    def Get_rank(self):
        return 0
    def Get_size(self):
        return 1
    def bcast(self, sendbuf, root=0):
        return sendbuf
    def gather(self, sendobj, root=0):
        return [sendobj]
    def allgather(self, sendobj):
        return [sendobj]


def init_communicator():
    if parallel:
        comm = MPI.COMM_WORLD
    else:
        comm = FakeComm()
    return comm


def split_seeds(seeds, comm):
    """Round-robin share of seeds handled by this rank."""
    return [s for i, s in enumerate(seeds) if i % comm.size == comm.rank]
