#pragma once

namespace conetomo {

struct Point2 {
    double x1;
    double x2;

    bool operator==(const Point2&) const = default;
};

struct Covector {
    double xi1;
    double xi2;

    bool operator==(const Covector&) const = default;
};

/// Point-direction pair (x, xi) with xi != 0.
struct WavefrontElement {
    Point2 x;
    Covector xi;
};

}  // namespace conetomo
