# Calculate the average of a list of
# grades, if None, you should continue
# to the next grade
def calculate_average (grades):
    total = 0
    for grade in grades:
        total += grade
    average = total / len (grades)
    return average
