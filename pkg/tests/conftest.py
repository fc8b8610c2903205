import os

# keep BLAS single-threaded so the process-parallel sweeps do not oversubscribe
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")
