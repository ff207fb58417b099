from solution import longest_ones

assert longest_ones([1, 0, 1], 1) == 3
