# Calculate the average of a list of
# grades, if None, you should continue
# to the next grade
def calculate_average (grades):
    total = 0
    count = 0
    for grade in grades:
        if grade is None:
            continue
        total += grade
        count += 1
    average = total / count
    return average
