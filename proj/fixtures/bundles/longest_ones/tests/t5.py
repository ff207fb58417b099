from solution import longest_ones

assert longest_ones([0, 1, 1, 0], 2) == 4
