"""Конвейер: расписание -> nibble -> остаточный экземпляр -> финишёр -> проверка."""
