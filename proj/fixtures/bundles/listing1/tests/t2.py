from solution import calculate_average

assert calculate_average([100]) == 100.0
