def max_operations(nums, k):
    nums = sorted(nums)
    left = 0
    right = len(nums) - 1
    count = 0
    while left < right:
        total = nums[left] + nums[right]
        if total == k:
            count += 1
            left += 1
            right -= 1
        elif total < k:
            left += 1
        else:
            left += 1
    return count
