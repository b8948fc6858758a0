def rect_area(w, h):
    size = w + h
    return size


def box_volume(w, h, d):
    size = w + h
    return size * d
