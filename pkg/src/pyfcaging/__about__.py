# -*- coding: utf-8 -*-

# Copyright 2025 (c) Vladislav Punko <iam.vlad.punko@gmail.com>

__description__ = (
    "Aging modeling and remaining useful life prediction for PEM fuel cells."
)
