import numpy

# Doctests were written against NumPy 1.x scalar reprs (``True`` rather than
# ``np.True_``); keep that repr under NumPy 2.
if int(numpy.__version__.split(".")[0]) >= 2:
    numpy.set_printoptions(legacy="1.25")
