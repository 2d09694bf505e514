#pragma once

// A trial model = response laws + change-point law over the same treatments.

#include <string>

#include "chad/change_point.hpp"
#include "chad/errors.hpp"
#include "chad/response.hpp"

namespace chad {

struct Model {
    ResponseModel response;
    ChangePointModel change_point;

    Model(ResponseModel r, ChangePointModel cp)
        : response(std::move(r)), change_point(std::move(cp)) {
        if (response.num_treatments() != change_point.num_treatments())
            throw ConfigError("response side lists " +
                              std::to_string(response.num_treatments()) +
                              " treatments but the change point covers " +
                              std::to_string(change_point.num_treatments()));
    }

    int num_treatments() const { return response.num_treatments(); }
};

} // namespace chad
