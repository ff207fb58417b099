from solution import max_operations

assert max_operations([2, 2, 2, 2], 4) == 2
