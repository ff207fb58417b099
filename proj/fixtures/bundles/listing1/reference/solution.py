# Calculate the average of a list of
# grades, if None, you should continue
# to the next grade
def calculate_average (grades):
    total = 0
    valid = [grade for grade in grades if grade is not None]
    for grade in valid:
        total += grade
    average = total / len (valid)
    return average
