from solution import max_operations

assert max_operations([1, 5, 9], 6) == 1
