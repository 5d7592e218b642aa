"""Базовые структуры: граф, рёберное соответствие, независимая проверка раскраски."""
